"""Pretrained encoder wrappers.

The checkpoint layout follows the public stacked-cross-attention
implementation: ``{'model': [image_state_dict, text_state_dict],
'opt': ...}`` where the image side is a linear projection of precomputed
region features and the text side is a word embedding followed by a
bidirectional GRU whose two directions are averaged. Module attribute
names (``fc``, ``embed``, ``rnn``) match that code so its published
checkpoints load directly. A ``vocab`` entry may be embedded in the
checkpoint; otherwise a vocabulary JSON must be supplied alongside.

Everything runs on CPU in eval mode, so extraction is deterministic.
"""

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_HELP = (
    "no usable checkpoint at {path!r}: download a pretrained grounding "
    "checkpoint (e.g. the MS-COCO model from "
    "https://github.com/kuanghuei/SCAN, linked under 'pre-trained models') "
    "and pass its path via --checkpoint"
)

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")

START_TOKEN = "<start>"
END_TOKEN = "<end>"
UNK_TOKEN = "<unk>"


class CheckpointError(RuntimeError):
    pass


@dataclass
class EncoderConfig:
    img_dim: int = 2048
    word_dim: int = 300
    embed_size: int = 1024
    num_layers: int = 1
    no_imgnorm: bool = False
    no_txtnorm: bool = False

    @classmethod
    def from_opt(cls, opt) -> "EncoderConfig":
        def get(name, default):
            if isinstance(opt, dict):
                return opt.get(name, default)
            return getattr(opt, name, default)

        return cls(
            img_dim=int(get("img_dim", 2048)),
            word_dim=int(get("word_dim", 300)),
            embed_size=int(get("embed_size", 1024)),
            num_layers=int(get("num_layers", 1)),
            no_imgnorm=bool(get("no_imgnorm", False)),
            no_txtnorm=bool(get("no_txtnorm", False)),
        )


def tokenize(text: str) -> list[str]:
    """Deterministic lowercase word tokenizer used for caption encoding."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    def __init__(self, word_to_index: dict[str, int]):
        if UNK_TOKEN not in word_to_index:
            raise CheckpointError(f"vocabulary is missing the {UNK_TOKEN} entry")
        self.word_to_index = dict(word_to_index)
        self.unk = self.word_to_index[UNK_TOKEN]

    def __len__(self) -> int:
        return len(self.word_to_index)

    def encode(self, text: str) -> list[int]:
        """Token ids for a caption, wrapped in start/end markers the text
        encoder was trained with. Raises on captions with no tokens."""
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("caption has no tokens after tokenization")
        wrapped = [START_TOKEN, *tokens, END_TOKEN]
        return [self.word_to_index.get(tok, self.unk) for tok in wrapped]

    @classmethod
    def from_json(cls, path) -> "Vocabulary":
        return cls(json.loads(Path(path).read_text()))


def _l2norm_rows(x):
    import torch

    return x / torch.clamp(x.norm(dim=-1, keepdim=True), min=1e-12)


class GroundingEncoders:
    """Image projection + text encoder pair loaded from one checkpoint."""

    def __init__(self, cfg: EncoderConfig, image_state, text_state, vocab: Vocabulary):
        import torch
        from torch import nn

        if len(vocab) != _embedding_rows(text_state):
            raise CheckpointError(
                f"vocabulary has {len(vocab)} entries but the checkpoint "
                f"embedding has {_embedding_rows(text_state)} rows"
            )
        self.cfg = cfg
        self.vocab = vocab

        class _ImageEncoder(nn.Module):
            def __init__(self):
                super().__init__()
                self.fc = nn.Linear(cfg.img_dim, cfg.embed_size)

        class _TextEncoder(nn.Module):
            def __init__(self):
                super().__init__()
                self.embed = nn.Embedding(len(vocab), cfg.word_dim)
                self.rnn = nn.GRU(
                    cfg.word_dim,
                    cfg.embed_size,
                    cfg.num_layers,
                    batch_first=True,
                    bidirectional=True,
                )

        self._image = _ImageEncoder()
        self._text = _TextEncoder()
        self._image.load_state_dict(image_state)
        self._text.load_state_dict(text_state)
        self._image.eval()
        self._text.eval()
        for module in (self._image, self._text):
            for param in module.parameters():
                param.requires_grad_(False)
        self._torch = torch

    @property
    def d(self) -> int:
        return self.cfg.embed_size

    def encode_regions(self, features: np.ndarray) -> np.ndarray:
        """Project precomputed region features (n x img_dim) into the
        joint space; rows L2-normalized unless the checkpoint says not to."""
        torch = self._torch
        if features.ndim != 2 or features.shape[1] != self.cfg.img_dim:
            raise ValueError(
                f"expected region features of shape (n, {self.cfg.img_dim}), "
                f"got {features.shape}"
            )
        with torch.no_grad():
            x = torch.from_numpy(np.ascontiguousarray(features, dtype=np.float32))
            out = self._image.fc(x)
            if not self.cfg.no_imgnorm:
                out = _l2norm_rows(out)
        return out.numpy().astype(np.float32)

    def encode_caption(self, text: str) -> np.ndarray:
        """Contextual token embeddings (m x embed_size) for one caption;
        m counts the encoder's token sequence including start/end marks."""
        torch = self._torch
        ids = self.vocab.encode(text)
        with torch.no_grad():
            x = torch.tensor(ids, dtype=torch.long).unsqueeze(0)
            emb = self._text.embed(x)
            out, _ = self._text.rnn(emb)
            half = self.cfg.embed_size
            out = (out[..., :half] + out[..., half:]) / 2.0
            if not self.cfg.no_txtnorm:
                out = _l2norm_rows(out)
        return out.squeeze(0).numpy().astype(np.float32)


def _embedding_rows(text_state) -> int:
    return int(text_state["embed.weight"].shape[0])


def load_checkpoint(path, vocab_path=None) -> GroundingEncoders:
    """Load encoders from a checkpoint file.

    The vocabulary comes from the checkpoint's ``vocab`` entry when
    present, else from ``vocab_path`` (a word -> index JSON).
    """
    import torch

    path = Path(path)
    if not path.exists():
        raise CheckpointError(CHECKPOINT_HELP.format(path=str(path)))
    try:
        # trusted local checkpoint; the published files pickle an argparse
        # Namespace under 'opt', which weights_only loading rejects
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"{path}: cannot load checkpoint: {exc}") from exc
    if not isinstance(payload, dict) or "model" not in payload:
        raise CheckpointError(f"{path}: no 'model' entry in checkpoint")
    try:
        image_state, text_state = payload["model"]
    except (TypeError, ValueError) as exc:
        raise CheckpointError(
            f"{path}: 'model' should hold (image_state, text_state)"
        ) from exc
    cfg = EncoderConfig.from_opt(payload.get("opt", {}))
    if "vocab" in payload:
        vocab = Vocabulary(payload["vocab"])
    elif vocab_path is not None:
        vocab = Vocabulary.from_json(vocab_path)
    else:
        raise CheckpointError(
            f"{path}: checkpoint has no embedded vocabulary; pass --vocab"
        )
    return GroundingEncoders(cfg, image_state, text_state, vocab)


def make_random_checkpoint(path, words: list[str], seed: int = 0,
                           img_dim: int = 2048, word_dim: int = 300,
                           embed_size: int = 1024) -> None:
    """Write a randomly initialized checkpoint in the expected layout.

    Development/testing utility: exercises the exact loading and
    extraction paths when the real pretrained file is unavailable.
    """
    import torch
    from torch import nn

    torch.manual_seed(seed)
    vocab = {UNK_TOKEN: 0, START_TOKEN: 1, END_TOKEN: 2}
    for word in words:
        vocab.setdefault(word, len(vocab))
    image = nn.Linear(img_dim, embed_size)
    text_embed = nn.Embedding(len(vocab), word_dim)
    text_rnn = nn.GRU(word_dim, embed_size, 1, batch_first=True, bidirectional=True)
    image_state = {"fc.weight": image.weight.data, "fc.bias": image.bias.data}
    text_state = {"embed.weight": text_embed.weight.data}
    text_state.update({f"rnn.{k}": v for k, v in text_rnn.state_dict().items()})
    torch.save(
        {
            "model": (image_state, text_state),
            "opt": {
                "img_dim": img_dim,
                "word_dim": word_dim,
                "embed_size": embed_size,
                "num_layers": 1,
                "no_imgnorm": False,
                "no_txtnorm": False,
            },
            "vocab": vocab,
        },
        path,
    )
