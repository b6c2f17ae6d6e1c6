import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth_checkpoint import EMBED, IMG_DIM, VOCAB_WORDS, WORD_DIM

from tigerextract.encoders import load_checkpoint, make_random_checkpoint


@pytest.fixture(scope="session")
def checkpoint_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "grounding.pth"
    make_random_checkpoint(
        path, VOCAB_WORDS, seed=7, img_dim=IMG_DIM, word_dim=WORD_DIM, embed_size=EMBED
    )
    return path


@pytest.fixture(scope="session")
def encoders(checkpoint_path):
    return load_checkpoint(checkpoint_path)


@pytest.fixture
def feature_dir(tmp_path):
    rng = np.random.default_rng(3)
    directory = tmp_path / "features"
    directory.mkdir()
    for image_id in ("imA", "imB"):
        np.save(directory / f"{image_id}.npy", rng.standard_normal((36, IMG_DIM)).astype(np.float32))
    return directory
