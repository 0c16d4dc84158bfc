import numpy as np
import pytest

from voromps.geometry import DomainSpec, build_voronoi


def integer_lattice_sites(domain):
    """All integer grid points inside the padded rectangle."""
    lo, hi = domain.omega_h_min, domain.omega_h_max
    xs = np.arange(np.ceil(lo[0]), np.floor(hi[0]) + 1)
    ys = np.arange(np.ceil(lo[1]), np.floor(hi[1]) + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def ring_moat_sites(domain, rho_inner, rho_outer):
    """Integer lattice with a vacated circular band around the domain center.

    With the band empty, any interaction radius h inside it leaves no site
    near the rim of B_h(center), so every point of the ball is owned by a
    strict neighbor and the covering clause holds. Plain lattices always
    violate that clause: some site sits just past h and owns a cell dipping
    inside the ball.
    """
    sites = integer_lattice_sites(domain)
    rho = np.hypot(sites[:, 0] - domain.center[0], sites[:, 1] - domain.center[1])
    keep = (rho < rho_inner) | (rho > rho_outer)
    return sites[keep]


@pytest.fixture(scope="session")
def quadrant_decomp():
    """Four sites splitting the unit square into equal quarter cells."""
    dom = DomainSpec([0.2, 0.2], [0.8, 0.8], 0.2)
    sites = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]]
    return build_voronoi(sites, dom)


@pytest.fixture(scope="session")
def lattice_decomp():
    """Plain 19 x 19 unit lattice; interior cells are exact unit squares."""
    dom = DomainSpec([-1.4, -1.4], [1.4, 1.4], 8.0)
    return build_voronoi(integer_lattice_sites(dom), dom)


@pytest.fixture(scope="session")
def moat_decomp():
    """Unit lattice with the band 10 <= |a| <= 12 vacated around the origin."""
    dom = DomainSpec([-1.4, -1.4], [1.4, 1.4], 11.6)
    return build_voronoi(ring_moat_sites(dom, 10.0, 12.0), dom)


@pytest.fixture(scope="session")
def random_decomp():
    dom = DomainSpec([0.25, 0.25], [0.75, 0.75], 0.25)
    rng = np.random.Generator(np.random.Philox(key=42))
    sites = rng.uniform(0.02, 0.98, size=(50, 2))
    return build_voronoi(sites, dom)
