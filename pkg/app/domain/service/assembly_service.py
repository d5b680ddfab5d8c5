"""
유한요소 조립 서비스 (가우스 적분, B 행렬, 전역 잔차/접선/연성 보정)
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from app.domain.exceptions import MeshError, SingularMatrixError
from app.domain.model.mesh_model import ElementKind, Mesh, QuadratureRule

logger = logging.getLogger(__name__)

_GAUSS = 1.0 / np.sqrt(3.0)

# hex8 절점의 자연좌표 부호 (아래면 반시계 → 윗면 반시계)
HEX_NODE_SIGNS = np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
], dtype=float)


def quadrature_rule(kind: ElementKind) -> QuadratureRule:
    """방향별 2점 가우스 (봉 2점, hex 8점)"""
    if kind == ElementKind.BAR1D:
        return QuadratureRule(points=np.array([[-_GAUSS], [_GAUSS]]), weights=np.ones(2))
    points = np.array([[a, b, c] for c in (-_GAUSS, _GAUSS) for b in (-_GAUSS, _GAUSS) for a in (-_GAUSS, _GAUSS)])
    return QuadratureRule(points=points, weights=np.ones(8))


def shape_functions(kind: ElementKind, point: np.ndarray) -> np.ndarray:
    if kind == ElementKind.BAR1D:
        return np.array([0.5 * (1.0 - point[0]), 0.5 * (1.0 + point[0])])
    return 0.125 * np.prod(1.0 + HEX_NODE_SIGNS * point[None, :], axis=1)


def shape_gradients(kind: ElementKind, point: np.ndarray) -> np.ndarray:
    """자연좌표 형상함수 미분 (dim × 절점)"""
    if kind == ElementKind.BAR1D:
        return np.array([[-0.5, 0.5]])
    factors = 1.0 + HEX_NODE_SIGNS * point[None, :]
    grads = np.empty((3, 8))
    for d in range(3):
        others = [a for a in range(3) if a != d]
        grads[d] = 0.125 * HEX_NODE_SIGNS[:, d] * factors[:, others[0]] * factors[:, others[1]]
    return grads


def b_matrix(coords: np.ndarray, kind: ElementKind, point: np.ndarray) -> Tuple[np.ndarray, float]:
    """변형률-변위 행렬 B (공학 전단) 와 det J"""
    grads = shape_gradients(kind, point)
    jacobian = grads @ coords
    det_j = float(np.linalg.det(jacobian))
    if det_j <= 0.0:
        raise MeshError(f"뒤집힌 요소 (det J = {det_j:.3e})", {"detJ": det_j})
    dn = np.linalg.solve(jacobian, grads)
    if kind == ElementKind.BAR1D:
        return dn, det_j

    B = np.zeros((6, 24))
    for a in range(8):
        dx, dy, dz = dn[:, a]
        c = 3 * a
        B[0, c] = dx
        B[1, c + 1] = dy
        B[2, c + 2] = dz
        B[3, c + 1], B[3, c + 2] = dz, dy
        B[4, c], B[4, c + 2] = dz, dx
        B[5, c], B[5, c + 1] = dy, dx
    return B, det_j


@dataclass(frozen=True)
class GaussPoint:
    """요소 적분점 캐시"""
    element: int
    local_index: int
    dofs: np.ndarray
    B: np.ndarray
    weight: float        # w·detJ (봉은 단면적 포함)
    coords: np.ndarray   # 물리 좌표


class AssemblyService:
    """메쉬 위의 전역 조립

    가우스점 순서는 (요소, 적분점) 사전식으로 고정되어 누적 순서가 결정적이다.
    """

    def __init__(self, mesh: Mesh):
        mesh.validate()
        self.mesh = mesh
        self.rule = quadrature_rule(mesh.kind)
        self.points: List[GaussPoint] = []
        for e in range(len(mesh.elements)):
            coords = mesh.nodes[mesh.elements[e]]
            dofs = mesh.element_dofs(e)
            for g, (xi, w) in enumerate(zip(self.rule.points, self.rule.weights)):
                B, det_j = b_matrix(coords, mesh.kind, xi)
                weight = w * det_j * (mesh.area if mesh.kind == ElementKind.BAR1D else 1.0)
                self.points.append(GaussPoint(e, g, dofs, B, float(weight), shape_functions(mesh.kind, xi) @ coords))
        self.free = mesh.free_dofs
        self.constrained = mesh.constrained_dofs
        logger.info(f"⚙️ 조립 준비 - 가우스점 {len(self.points)}개, 자유 dof {len(self.free)}개")

    @property
    def n_points(self) -> int:
        return len(self.points)

    def initial_displacement(self) -> np.ndarray:
        d = np.zeros(self.mesh.n_dofs)
        for dof, value in self.mesh.dirichlet:
            d[dof] = value
        return d

    def strains(self, d: np.ndarray) -> List[np.ndarray]:
        """가우스점별 ε = B·d_e"""
        return [gp.B @ d[gp.dofs] for gp in self.points]

    def internal_force(self, stresses: Sequence[np.ndarray]) -> np.ndarray:
        f = np.zeros(self.mesh.n_dofs)
        for gp, sigma in zip(self.points, stresses):
            f[gp.dofs] += gp.B.T @ sigma * gp.weight
        return f

    def assemble_residual(self, stresses: Sequence[np.ndarray], f_ext: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(R, 반력): R = 내력 − 외력 (구속 dof 행은 0), 반력은 구속 dof 의 내력 − 외력"""
        r = self.internal_force(stresses) - f_ext
        reactions = r[self.constrained].copy()
        r[self.constrained] = 0.0
        return r, reactions

    def assemble_tangent(self, tangents: Sequence[np.ndarray]) -> sp.csr_matrix:
        """K = Σ Bᵀ𝔏B w detJ (희소)"""
        rows, cols, data = [], [], []
        for gp, tangent in zip(self.points, tangents):
            ke = gp.B.T @ tangent @ gp.B * gp.weight
            rows.append(np.repeat(gp.dofs, len(gp.dofs)))
            cols.append(np.tile(gp.dofs, len(gp.dofs)))
            data.append(ke.ravel())
        n = self.mesh.n_dofs
        return sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()

    def assemble_coupling_correction(self, stress_corrections: Sequence[Optional[np.ndarray]]) -> np.ndarray:
        """(∂R/∂ν)(∂H/∂ν)⁻¹H 의 조립, 비탄성 가우스점의 −δσ_H 만 기여 (None 은 건너뜀)"""
        f = np.zeros(self.mesh.n_dofs)
        for gp, d_sigma in zip(self.points, stress_corrections):
            if d_sigma is None:
                continue
            f[gp.dofs] -= gp.B.T @ d_sigma * gp.weight
        f[self.constrained] = 0.0
        return f

    def solve(self, K: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
        """자유 dof 직접 희소 해, 구속 dof 증분은 0"""
        K_ff = K[self.free][:, self.free].tocsc()
        delta = np.zeros(self.mesh.n_dofs)
        solution = spla.spsolve(K_ff, rhs[self.free])
        if not np.all(np.isfinite(solution)):
            raise SingularMatrixError("전역 강성 행렬이 특이합니다", float("inf"))
        delta[self.free] = solution
        return delta

    def residual_norm(self, r: np.ndarray, f_ext: np.ndarray) -> float:
        """‖R_free‖ / max(‖F_ext‖, 1 N)"""
        return float(np.linalg.norm(r[self.free]) / max(np.linalg.norm(f_ext), 1.0))

    def nearest_point(self, point) -> int:
        """좌표에 가장 가까운 가우스점 번호"""
        point = np.asarray(point, dtype=float)
        coords = np.array([gp.coords for gp in self.points])
        return int(np.argmin(np.linalg.norm(coords - point[None, : coords.shape[1]], axis=1)))
