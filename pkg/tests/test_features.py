import numpy as np
import pytest

from vrnet.errors import InvalidInput
from vrnet.features import (
    LAGS,
    SCHEMA_ID,
    FeatureVector,
    assemble_input,
    extract_features,
    feature_length,
)
from vrnet.microgen import (
    GenSpec,
    VoxelGrid,
    generate_rsa,
    make_checkerboard,
    make_laminate,
)


def test_feature_lengths():
    assert feature_length(2) == 18
    assert feature_length(3) == 26
    g2 = generate_rsa(GenSpec(dim=2, shape=(64, 64), seed=70))
    assert extract_features(g2).values.shape == (18,)
    g3 = generate_rsa(GenSpec(dim=3, shape=(16, 16, 16), kinds=("spheres",), seed=71))
    assert extract_features(g3).values.shape == (26,)


def test_checkerboard_two_point_parity():
    # at 2x2 the cells are single voxels: S2 is 0 at odd lags, vf at even
    fv = extract_features(make_checkerboard((2, 2))).values
    assert fv[0] == 0.5
    for axis in range(2):
        block = fv[1 + 6 * axis : 1 + 6 * (axis + 1)]
        for lag, val in zip(LAGS, block):
            expected = 0.0 if lag % 2 else 0.5
            assert val == pytest.approx(expected, abs=1e-12)


def test_laminate_band_features():
    g = make_laminate((64, 64), 0, 0.5)
    fv = extract_features(g).values
    d = 2
    band = fv[1 + 6 * d : 1 + 7 * d]
    # lines parallel to the slab normal cross both phases; transverse
    # lines in the matrix half are complete
    assert band[0] == 0.0
    assert band[1] == 0.5


def test_laminate_directional_variance():
    g = make_laminate((64, 64), 0, 0.5)
    fv = extract_features(g).values
    d = 2
    dirvar = fv[1 + 7 * d : 1 + 8 * d]
    # along the normal every line has p=0.5 -> variance term 0.25;
    # transverse lines are single-phase -> 0
    assert dirvar[0] == pytest.approx(0.25)
    assert dirvar[1] == pytest.approx(0.0)


def test_interface_density_checkerboard():
    fv = extract_features(make_checkerboard((2, 2))).values
    # every voxel changes phase across each of the two axes
    assert fv[-1] == pytest.approx(2.0)


def test_translation_invariance():
    g = generate_rsa(GenSpec(dim=2, shape=(64, 64), seed=72))
    base = extract_features(g).values
    for shift in ((1, 0), (0, 7), (13, 29)):
        moved = extract_features(VoxelGrid(np.roll(g.cells, shift, axis=(0, 1)))).values
        assert np.max(np.abs(moved - base)) < 1e-12


def test_single_phase_rejected():
    with pytest.raises(InvalidInput):
        extract_features(VoxelGrid(np.zeros((8, 8), dtype=np.uint8)))
    with pytest.raises(InvalidInput):
        extract_features(VoxelGrid(np.ones((8, 8), dtype=np.uint8)))


def test_assemble_input_contrast_column():
    fv = extract_features(make_checkerboard((8, 8)))
    assert assemble_input(fv, 1.0)[-1] == 0.0
    assert assemble_input(fv, 100.0)[-1] == 2.0
    assert assemble_input(fv, 0.01)[-1] == -2.0
    assert assemble_input(fv, 100.0).shape == (19,)
    with pytest.raises(InvalidInput):
        assemble_input(fv, 0.0)


def test_feature_vector_validation():
    with pytest.raises(InvalidInput):
        FeatureVector(np.array([1.0, np.inf]))
    assert FeatureVector(np.zeros(3)).schema == SCHEMA_ID
