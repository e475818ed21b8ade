"""Built-in workload generators: CONV2D/GEMM nests, TCCG contraction kernels,
and the DNN layer table used by the case studies."""

from __future__ import annotations

from spatialdse.frontend import lower_to_problem
from spatialdse.nestir import LoopNestIR, parse_loop_nest
from spatialdse.problem import ProblemInstance


def conv2d_nest(
    n: int, k: int, c: int, x: int, y: int, r: int, s: int, stride: int = 1
) -> str:
    """Seven-loop CONV2D nest over input (x, y) and filter (r, s) windows.

    The x/y loops run over output positions ``0 .. (X - R) // stride``; the
    input activation is indexed with ``stride*x + r`` sliding windows.
    """
    xo = (x - r) // stride
    yo = (y - s) // stride
    sx = f"{stride}*x" if stride != 1 else "x"
    sy = f"{stride}*y" if stride != 1 else "y"
    return (
        f"for n = 0 to {n - 1}\n"
        f"  for k = 0 to {k - 1}\n"
        f"    for x = 0 to {xo}\n"
        f"      for y = 0 to {yo}\n"
        f"        for c = 0 to {c - 1}\n"
        f"          for r = 0 to {r - 1}\n"
        f"            for s = 0 to {s - 1}\n"
        f"              stmt OA[n][k][x][y] += IA[n][c][{sx} + r][{sy} + s] * F[k][c][r][s]\n"
    )


def gemm_nest(m: int, n: int, k: int) -> str:
    return (
        f"for m = 0 to {m - 1}\n"
        f"  for n = 0 to {n - 1}\n"
        f"    for k = 0 to {k - 1}\n"
        f"      stmt C[m][n] += A[m][k] * B[k][n]\n"
    )


def _contraction_nest(output: str, in_a: str, in_b: str, sizes: dict[str, int]) -> str:
    """Nest text for ``C[output] += A[in_a] * B[in_b]`` with index strings
    like ``"abcd"``; loop order follows sorted iterator names."""
    iters = sorted(set(output) | set(in_a) | set(in_b))
    lines = [
        "  " * depth + f"for {it} = 0 to {sizes[it] - 1}"
        for depth, it in enumerate(iters)
    ]
    ref = lambda name, idx: name + "".join(f"[{i}]" for i in idx)
    lines.append(
        "  " * len(iters)
        + f"stmt {ref('C', output)} += {ref('A', in_a)} * {ref('B', in_b)}"
    )
    return "\n".join(lines) + "\n"


# Tensor contraction kernels (TCCG reference shapes); every dimension shares
# one tensor-dimension-size (TDS) value.
TC_KERNELS = {
    "intensli2": ("abcd", "dbea", "ec"),
    "ccsd7": ("abc", "adec", "ebd"),
    "ccsd-t4": ("abcdef", "dfgb", "geac"),
}


def tc_nest(kernel: str, tds: int) -> str:
    output, in_a, in_b = TC_KERNELS[kernel]
    iters = set(output) | set(in_a) | set(in_b)
    return _contraction_nest(output, in_a, in_b, {i: tds for i in iters})


def tc_problem(kernel: str, tds: int) -> ProblemInstance:
    return lower_to_problem(parse_loop_nest(tc_nest(kernel, tds)))


def alg_conv2d_example() -> str:
    """The reference CONV2D nest: N=1 K=2 C=2 X=Y=4 R=S=2, stride 1."""
    return conv2d_nest(1, 2, 2, 4, 4, 2, 2)


def alg_tc_example(size: int = 16) -> str:
    """The reference 7-loop contraction (identical shape to ccsd-t4)."""
    return tc_nest("ccsd-t4", size)


# DNN layers used by the case studies.  CONV entries are
# (N, K, C, X, Y, R, S); GEMM entries are (batch, in_features, out_features).
DNN_LAYERS: dict[str, tuple[str, tuple[int, ...]]] = {
    "resnet50-1": ("conv", (32, 64, 64, 56, 56, 1, 1)),
    "resnet50-2": ("conv", (32, 64, 64, 56, 56, 3, 3)),
    "resnet50-3": ("conv", (32, 1024, 256, 14, 14, 1, 1)),
    "dlrm-1": ("gemm", (512, 1024, 1024)),
    "dlrm-2": ("gemm", (512, 1024, 64)),
    "dlrm-3": ("gemm", (512, 2048, 2048)),
    "bert-1": ("gemm", (256, 768, 768)),
    "bert-2": ("gemm", (256, 3072, 768)),
    "bert-3": ("gemm", (256, 768, 3072)),
}


def scale_size(size: int, scale: int) -> int:
    """Shrink a layer dimension for desk-scale runs; sizes <= 8 are kept."""
    if scale <= 1 or size <= 8:
        return size
    return max(8, size // scale)


def dnn_layer_nest(layer: str, scale: int = 1) -> str:
    kind, dims = DNN_LAYERS[layer]
    if kind == "conv":
        n, k, c, x, y, r, s = dims
        return conv2d_nest(
            scale_size(n, scale),
            scale_size(k, scale),
            scale_size(c, scale),
            scale_size(x, scale),
            scale_size(y, scale),
            r,
            s,
        )
    batch, nin, non = dims
    return gemm_nest(scale_size(batch, scale), scale_size(non, scale), scale_size(nin, scale))


def dnn_layer_problem(layer: str, scale: int = 1) -> ProblemInstance:
    return lower_to_problem(parse_loop_nest(dnn_layer_nest(layer, scale)))
