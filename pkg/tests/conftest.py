import numpy as np
import pytest

from boussinesq_afem.mesh import Mesh, build_initial_mesh


@pytest.fixture
def ref_triangle():
    """Single right triangle (0,0), (1,0), (0,1)."""
    return Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                np.array([[0, 1, 2]]))


@pytest.fixture
def two_elem_square():
    return build_initial_mesh("square", 1)


@pytest.fixture
def square4():
    return build_initial_mesh("square", 4)


@pytest.fixture
def lshape4():
    return build_initial_mesh("lshape", 4)
