"""
구조 격자 메쉬 생성 (1D 봉, 3D 직육면체 봉)
"""
import logging
from typing import Tuple

import numpy as np

from app.domain.exceptions import MeshError
from app.domain.model.mesh_model import ElementKind, Mesh

logger = logging.getLogger(__name__)

LOAD_KINDS = ("traction", "force")


def build_bar_mesh(length: float, n_elements: int, area: float) -> Mesh:
    """x 축 2절점 봉 메쉬, 0번 절점 고정, 끝 절점에 단위 하중 (N)"""
    if length <= 0 or area <= 0 or n_elements < 1:
        raise MeshError("봉 길이, 단면적, 요소 수는 양수여야 합니다",
                        {"length": length, "area": area, "n_elements": n_elements})
    nodes = np.linspace(0.0, length, n_elements + 1)[:, None]
    elements = np.column_stack([np.arange(n_elements), np.arange(1, n_elements + 1)])
    reference_load = np.zeros(n_elements + 1)
    reference_load[-1] = 1.0
    mesh = Mesh(
        nodes=nodes,
        elements=elements,
        kind=ElementKind.BAR1D,
        dirichlet=[(0, 0.0)],
        reference_load=reference_load,
        area=area,
        loaded_nodes=[n_elements],
        load_axis=0,
    )
    mesh.validate()
    logger.info(f"⚙️ 1D 봉 메쉬 생성 - 요소 {n_elements}개, L={length:g} m, A={area:g} m²")
    return mesh


def _node_index(i: int, j: int, k: int, nx: int, ny: int) -> int:
    return i + (nx + 1) * (j + (ny + 1) * k)


def build_box_mesh(
    size: Tuple[float, float, float],
    divisions: Tuple[int, int, int],
    load_kind: str = "traction",
) -> Mesh:
    """y 축 방향 직육면체 봉

    y=0 면 완전 고정, y=ly 면에 y 방향 기준 하중.
    traction: 하중 배율 1 = 1 Pa 면 하중 / force: 하중 배율 1 = 총 1 N.
    """
    lx, ly, lz = (float(v) for v in size)
    nx, ny, nz = (int(v) for v in divisions)
    if min(lx, ly, lz) <= 0 or min(nx, ny, nz) < 1:
        raise MeshError("박스 크기와 분할 수는 양수여야 합니다",
                        {"size": [lx, ly, lz], "divisions": [nx, ny, nz]})
    if load_kind not in LOAD_KINDS:
        raise MeshError(f"알 수 없는 하중 종류: {load_kind}", {"load_kind": load_kind})

    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    zs = np.linspace(0.0, lz, nz + 1)
    nodes = np.array([[x, y, z] for z in zs for y in ys for x in xs])

    elements = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                bottom = [
                    _node_index(i, j, k, nx, ny),
                    _node_index(i + 1, j, k, nx, ny),
                    _node_index(i + 1, j + 1, k, nx, ny),
                    _node_index(i, j + 1, k, nx, ny),
                ]
                top = [_node_index(*_shift_k(n, nx, ny), nx, ny) for n in bottom]
                elements.append(bottom + top)
    elements = np.array(elements, dtype=int)

    dirichlet = []
    for k in range(nz + 1):
        for i in range(nx + 1):
            node = _node_index(i, 0, k, nx, ny)
            dirichlet.extend((3 * node + a, 0.0) for a in range(3))

    # 끝면 요소 면적을 네 절점에 균등 분배
    reference_load = np.zeros(3 * len(nodes))
    face_area = (lx / nx) * (lz / nz)
    loaded = set()
    for k in range(nz):
        for i in range(nx):
            for di, dk in ((0, 0), (1, 0), (1, 1), (0, 1)):
                node = _node_index(i + di, ny, k + dk, nx, ny)
                reference_load[3 * node + 1] += face_area / 4.0
                loaded.add(node)
    if load_kind == "force":
        reference_load /= lx * lz

    mesh = Mesh(
        nodes=nodes,
        elements=elements,
        kind=ElementKind.HEX8,
        dirichlet=dirichlet,
        reference_load=reference_load,
        loaded_nodes=sorted(loaded),
        load_axis=1,
    )
    mesh.validate()
    logger.info(f"⚙️ 3D 봉 메쉬 생성 - {nx}×{ny}×{nz} hex8, 절점 {len(nodes)}개, dof {mesh.n_dofs}개")
    return mesh


def _shift_k(node: int, nx: int, ny: int) -> Tuple[int, int, int]:
    """한 층 위 (k+1) 절점의 (i, j, k)"""
    layer = (nx + 1) * (ny + 1)
    k, rest = divmod(node, layer)
    j, i = divmod(rest, nx + 1)
    return i, j, k + 1


def nearest_node(mesh: Mesh, point) -> int:
    """좌표에 가장 가까운 절점 (동률이면 작은 번호)"""
    point = np.asarray(point, dtype=float)
    distances = np.linalg.norm(mesh.nodes - point[None, : mesh.nodes.shape[1]], axis=1)
    return int(np.argmin(distances))


def default_probe_point(mesh: Mesh) -> np.ndarray:
    """기본 관측점 (좌표 최대 모서리, 봉의 자유단)"""
    return mesh.nodes.max(axis=0)


def build_mesh(geometry) -> Mesh:
    """GeometryConfig 블록으로 메쉬 생성"""
    if geometry.kind == ElementKind.BAR1D:
        return build_bar_mesh(geometry.length, geometry.n_elements, geometry.area)
    return build_box_mesh(tuple(geometry.size), tuple(geometry.divisions), geometry.load_kind)
