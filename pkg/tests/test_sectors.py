import numpy as np
import pytest

from magnonkit import SectorEntry, collective_matrices, sector_decomposition


def test_single_copy():
    table = sector_decomposition(1)
    assert table.entries == (SectorEntry(twice_j=1, multiplicity=1),)
    assert table.entries[0].j == 0.5


def test_three_copies():
    table = sector_decomposition(3)
    assert [(e.j, e.multiplicity) for e in table.entries] == [(1.5, 1), (0.5, 2)]
    assert table.total_dimension() == 8


def test_five_copies():
    table = sector_decomposition(5)
    assert [(e.j, e.multiplicity) for e in table.entries] == [(2.5, 1), (1.5, 4), (0.5, 5)]
    assert 6 + 4 * 4 + 5 * 2 == 32
    assert table.total_dimension() == 32


def test_dimension_identity_up_to_cap():
    for n in range(1, 32, 2):
        assert sector_decomposition(n).total_dimension() == 2**n


def test_rejects_even_and_out_of_range():
    for bad in (0, 2, 4, -1):
        with pytest.raises(ValueError):
            sector_decomposition(bad)
    with pytest.raises(ValueError, match="maximum"):
        sector_decomposition(33)


@pytest.mark.parametrize("twice_j", [1, 2, 3, 5, 8])
def test_collective_matrix_algebra(twice_j):
    s_plus, s_minus, s_three = collective_matrices(twice_j)
    # Pauli-sum units: [S+, S-] = S3 and [S3, S+] = 2 S+
    np.testing.assert_allclose(s_plus @ s_minus - s_minus @ s_plus, s_three, atol=1e-12)
    np.testing.assert_allclose(
        s_three @ s_plus - s_plus @ s_three, 2.0 * s_plus, atol=1e-12
    )
    np.testing.assert_array_equal(s_minus, s_plus.T)
    eigenvalues = np.diagonal(s_three)
    assert eigenvalues[0] == -twice_j and eigenvalues[-1] == twice_j


def test_spin_half_matches_pauli():
    s_plus, s_minus, s_three = collective_matrices(1)
    np.testing.assert_array_equal(s_plus, [[0.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(s_three, [[-1.0, 0.0], [0.0, 1.0]])
