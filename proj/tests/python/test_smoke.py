# Copyright (c) the Scaleform authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import scaleform as sf

SMALL = """
[net]
channels = 8
[ffe]
depths = 1,1,1,1
dim = 16
out_channels = 16
[gen]
latent_dim = 16
mapping_hidden = 16
channels = 8
[train]
iters = 4
batch = 2
milestones = 2,3
"""


def test_grid_values():
    g = sf.build_grid(4, 4, 2.0)
    assert g["x_prime"][0] == pytest.approx(-0.25, abs=1e-12)
    assert g["rx"][0] == pytest.approx(-0.25, abs=1e-12)
    g = sf.build_grid(6, 6, 1.5)
    assert g["x_prime"][3] == pytest.approx(3.5 / 1.5 - 0.5, abs=1e-12)
    assert g["rx"][3] == pytest.approx(3.5 / 1.5 - 0.5 - math.floor(3.5 / 1.5), abs=1e-12)


def test_synth_face_shape_and_range():
    face = sf.synth_face(32, 7, 0)
    assert face.shape == (3, 32, 32)
    assert face.min() >= 0.0 and face.max() <= 1.0
    assert np.array_equal(face, sf.synth_face(32, 7, 0))


def test_metrics():
    rng = np.random.default_rng(0)
    a = rng.uniform(0.1, 0.9, size=(3, 16, 16))
    assert sf.psnr(a, a) == 99.0
    assert sf.ssim(a, a) == pytest.approx(1.0, abs=1e-9)
    b = np.clip(a + 1.0 / 255.0, 0, 1)
    assert sf.psnr(a, b) == pytest.approx(20 * math.log10(255.0), abs=0.01)


def test_degrade_identity_chain():
    face = sf.synth_face(32, 7, 1)
    lq = sf.degrade(face, sigma=0.0, r=1.0, delta=0.0, q=100)
    assert lq.shape == face.shape
    assert sf.psnr(lq, face) > 45.0
    assert sf.degrade(face, r=2.0).shape == (3, 16, 16)


def test_identity_restore_and_dims():
    rng = np.random.default_rng(1)
    img = rng.uniform(0.3, 0.7, size=(3, 32, 32))
    out = sf.restore(img, 1.0, identity=True)
    assert out.shape == img.shape
    assert sf.psnr(out, img) > 40.0
    out = sf.restore(img[:, :20, :18], (2.4, 1.5), identity=True)
    assert out.shape == (3, 30, 43)


def test_bad_shapes_raise():
    with pytest.raises(ValueError):
        sf.restore(np.zeros((2, 8, 8)), 1.0, identity=True)


def test_short_training_is_deterministic(tmp_path):
    faces = [sf.synth_face(32, 3, i) for i in range(3)]
    ck = str(tmp_path / "run.ffck")
    a = sf.train(faces, SMALL, ck)
    b = sf.train(faces, SMALL)
    assert a["log"] == b["log"]
    assert len(a["log"]) == 4
    assert all(math.isfinite(float(row.split("\t")[-1])) for row in a["log"])
    lq = sf.degrade(faces[0], r=2.0)
    out = sf.restore(lq, 2.0, checkpoint=ck)
    assert out.shape == (3, 32, 32)
    assert np.isfinite(out).all()


def test_gradcheck_binding():
    ok, worst = sf.gradcheck("toygen", 0, 1)
    assert ok and worst <= 1e-5
    ok, worst = sf.gradcheck("negative-control", 0, 1)
    assert not ok
