"""Small systems shared by the tests."""
import numpy as np

from localscale.ifs import AffineMap, PerturbedMap, System


def diag_system():
    """Two non-conformal diagonal maps with swapped stretch directions."""
    return System((AffineMap(np.diag([0.5, 0.25]), [0.4, 0.0]), AffineMap(np.diag([0.25, 0.5]), [-0.4, 0.0])))


def single_diag():
    return System((AffineMap(np.diag([0.5, 0.25]), [0.0, 0.0]),))


def rotation_system():
    r = np.array([[0.0, -1.0], [1.0, 0.0]]) / 3
    return System((AffineMap(r, [0.5, 0.0]), AffineMap(np.eye(2) / 3, [-0.5, 0.0])))


def quadratic():
    return System((PerturbedMap([[1 / 3]], [0.0], [{"exps": [2], "coef": [0.02]}]),))


def quadratic_pair():
    return System((
        PerturbedMap([[1 / 3]], [-0.5], [{"exps": [2], "coef": [0.02]}]),
        PerturbedMap([[1 / 3]], [0.5], [{"exps": [2], "coef": [-0.02]}]),
    ))


def perturbed_2d():
    return System((
        PerturbedMap(np.diag([0.3, 0.25]), [0.4, 0.1], [{"exps": [1, 1], "coef": [0.03, -0.02]}]),
        PerturbedMap([[0.2, 0.05], [0.0, 0.3]], [-0.4, -0.2], [{"exps": [2, 0], "coef": [0.02, 0.01]}]),
    ))


def one_map(lam=0.5):
    return System((AffineMap([[lam]], [0.0]),))
