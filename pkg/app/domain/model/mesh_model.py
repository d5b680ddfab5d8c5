from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np

from app.domain.exceptions import MeshError


class ElementKind(str, Enum):
    """요소 종류"""
    BAR1D = "bar1d"
    HEX8 = "hex8"


@dataclass(frozen=True)
class QuadratureRule:
    """가우스 적분점 (자연좌표) 과 가중치"""
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)


@dataclass
class Mesh:
    """구조 메쉬 + 경계조건

    dirichlet: (전역 dof, 규정 변위) 목록
    reference_load: 하중 배율 1.0 에 해당하는 절점 하중 벡터 (N)
    """
    nodes: np.ndarray
    elements: np.ndarray
    kind: ElementKind
    dirichlet: List[Tuple[int, float]]
    reference_load: np.ndarray
    area: float = 1.0
    loaded_nodes: List[int] = field(default_factory=list)
    load_axis: int = 0   # 하중/변위 출력 방향 (절점 내 dof 번호)

    @property
    def dofs_per_node(self) -> int:
        return 1 if self.kind == ElementKind.BAR1D else 3

    @property
    def n_dofs(self) -> int:
        return len(self.nodes) * self.dofs_per_node

    @property
    def constrained_dofs(self) -> np.ndarray:
        return np.array(sorted(dof for dof, _ in self.dirichlet), dtype=int)

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.flatnonzero(mask)

    def element_dofs(self, element: int) -> np.ndarray:
        """요소의 전역 dof 번호 (절점 우선 순서)"""
        conn = self.elements[element]
        per = self.dofs_per_node
        return (conn[:, None] * per + np.arange(per)[None, :]).ravel()

    def validate(self) -> None:
        """연결성 범위와 구속 존재 확인"""
        if self.elements.size == 0:
            raise MeshError("요소가 없습니다")
        if self.elements.min() < 0 or self.elements.max() >= len(self.nodes):
            raise MeshError("연결성 인덱스가 절점 범위를 벗어났습니다")
        if not self.dirichlet:
            raise MeshError("Dirichlet 구속이 최소 하나 필요합니다 (강체 모드)")
        dofs = [dof for dof, _ in self.dirichlet]
        if min(dofs) < 0 or max(dofs) >= self.n_dofs:
            raise MeshError("구속 dof 가 범위를 벗어났습니다")
        if len(self.reference_load) != self.n_dofs:
            raise MeshError("기준 하중 벡터 크기가 dof 수와 다릅니다")


@dataclass(frozen=True)
class Probe:
    """결과 기록용 관측 절점/가우스점"""
    node: int
    dof: int
    gauss_index: int
    point: Tuple[float, ...]
