"""Fixed-capacity scheduling window with per-kernel upstream tracking.

The window holds up to N in-flight kernels, each ready, pending, or
executing. A kernel's stored upstream set only ever names current window
occupants: stale ids supplied by the caller are filtered at insertion, and
completion removes the finished kernel from every upstream set, promoting
kernels whose sets drain to ready. Slots are freed only on completion.

Callers must serialize mutations (one-writer contract).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class KernelState(Enum):
    READY = "ready"
    PENDING = "pending"
    EXECUTING = "executing"


class WindowError(Exception):
    pass


class WindowFullError(WindowError):
    pass


class DuplicateIdError(WindowError):
    pass


class UnknownIdError(WindowError):
    pass


class NotReadyError(WindowError):
    pass


class NotExecutingError(WindowError):
    pass


@dataclass
class _Slot:
    state: KernelState
    upstream: set[int] = field(default_factory=set)


class SchedulingWindow:
    """N-slot window; upstream sets shrink monotonically until ready."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = capacity
        self._slots: dict[int, _Slot] = {}

    def __len__(self) -> int:
        return len(self._slots)

    def __contains__(self, kernel_id: int) -> bool:
        return kernel_id in self._slots

    @property
    def free_slots(self) -> int:
        return self.capacity - len(self._slots)

    def occupant_ids(self) -> list[int]:
        return sorted(self._slots)

    def state_of(self, kernel_id: int) -> KernelState:
        slot = self._slots.get(kernel_id)
        if slot is None:
            raise UnknownIdError(f"kernel {kernel_id} not in window")
        return slot.state

    def upstream_of(self, kernel_id: int) -> frozenset[int]:
        slot = self._slots.get(kernel_id)
        if slot is None:
            raise UnknownIdError(f"kernel {kernel_id} not in window")
        return frozenset(slot.upstream)

    def insert(self, kernel_id: int, proposed_upstream) -> KernelState:
        """Add a kernel; returns its resulting state.

        The stored upstream set is the intersection of the proposal with
        current occupants, so ids referring to already-retired kernels are
        dropped here.
        """
        if len(self._slots) >= self.capacity:
            raise WindowFullError(f"window at capacity {self.capacity}")
        if kernel_id in self._slots:
            raise DuplicateIdError(f"kernel {kernel_id} already in window")
        upstream = {u for u in proposed_upstream if u in self._slots}
        state = KernelState.READY if not upstream else KernelState.PENDING
        self._slots[kernel_id] = _Slot(state=state, upstream=upstream)
        return state

    def mark_executing(self, kernel_id: int) -> None:
        slot = self._slots.get(kernel_id)
        if slot is None:
            raise UnknownIdError(f"kernel {kernel_id} not in window")
        if slot.state is not KernelState.READY:
            raise NotReadyError(f"kernel {kernel_id} is {slot.state.value}, not ready")
        slot.state = KernelState.EXECUTING

    def complete(self, kernel_id: int) -> list[int]:
        """Retire an executing kernel; returns ids newly ready, ascending."""
        slot = self._slots.get(kernel_id)
        if slot is None:
            raise UnknownIdError(f"kernel {kernel_id} not in window")
        if slot.state is not KernelState.EXECUTING:
            raise NotExecutingError(
                f"kernel {kernel_id} is {slot.state.value}, not executing"
            )
        del self._slots[kernel_id]
        released = []
        for kid, other in self._slots.items():
            if kernel_id in other.upstream:
                other.upstream.discard(kernel_id)
                if not other.upstream and other.state is KernelState.PENDING:
                    other.state = KernelState.READY
                    released.append(kid)
        return sorted(released)

    def ready_set(self) -> list[int]:
        """Ids currently ready, in ascending id order."""
        return sorted(
            kid for kid, slot in self._slots.items() if slot.state is KernelState.READY
        )

    def executing_ids(self) -> list[int]:
        return sorted(
            kid for kid, slot in self._slots.items() if slot.state is KernelState.EXECUTING
        )
