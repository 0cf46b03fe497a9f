"""Record of which (agent, item) pairs have been consumed, and their outcomes."""

from __future__ import annotations

import numpy as np

from recsim.student import TrainingDataset


class InteractionLog:
    """
    Consumed pairs of one realization.

    A pair is consumed when it is seeded (timestep 0) or recommended at
    timestep ``t >= 1``; it is never offered again.  Observations are also
    kept in consumption order, which fixes the order of the training data.

    Attributes:
        recommended: n×m boolean mask of consumed pairs.
        timestep: n×m timestep of consumption, ``-1`` where not consumed.
        label: n×m outcome, ``-1`` where not consumed.
    """

    def __init__(self, n: int, m: int):
        self.recommended = np.zeros((n, m), dtype=bool)
        self.timestep = np.full((n, m), -1, dtype=np.int32)
        self.label = np.full((n, m), -1, dtype=np.int8)
        self._agents: list[np.ndarray] = []
        self._items: list[np.ndarray] = []
        self._labels: list[np.ndarray] = []
        self._popularity = np.zeros(m, dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return self.recommended.shape

    def __len__(self):
        return sum(len(a) for a in self._agents)

    def record(self, agents, items, labels, t: int):
        agents = np.asarray(agents, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int8)
        if len(agents) == 0:
            return
        if self.recommended[agents, items].any():
            raise ValueError("pair consumed twice")
        if len(np.unique(agents * self.shape[1] + items)) != len(agents):
            raise ValueError("duplicate pair within one batch")
        self.recommended[agents, items] = True
        self.timestep[agents, items] = t
        self.label[agents, items] = labels
        self._agents.append(agents)
        self._items.append(items)
        self._labels.append(labels)
        np.add.at(self._popularity, items, labels.astype(np.int64))

    def unseen(self) -> np.ndarray:
        return ~self.recommended

    def popularity(self) -> np.ndarray:
        "Per-item count of positive outcomes so far."
        return self._popularity.copy()

    def total_choices(self) -> int:
        return int(self._popularity.sum())

    def dataset(self) -> TrainingDataset:
        if not self._agents:
            return TrainingDataset(np.zeros(0), np.zeros(0), np.zeros(0))
        return TrainingDataset(
            np.concatenate(self._agents), np.concatenate(self._items), np.concatenate(self._labels)
        )
