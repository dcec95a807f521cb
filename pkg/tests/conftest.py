import pytest

from deadcore import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the jit kernels once so timed tests measure numerics, not JIT."""
    kernels.warmup()


@pytest.fixture
def numpy_backend():
    """Run a test on the fallback backend, restoring auto selection after."""
    kernels.set_backend("numpy")
    yield
    kernels.set_backend("auto")
