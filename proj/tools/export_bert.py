#!/usr/bin/env python3
"""Export a HuggingFace BERT checkpoint to the directory layout read by t2m.

    export_bert.py --model bert-large-cased --out models/bert-large-cased

writes config.json, vocab.txt and weights.t2ma (float32 arrays under the
HuggingFace parameter names, without the "bert." prefix).

    export_bert.py --self-test --t2m build/tools/t2m

builds a small random BERT, exports it, and checks that `t2m embed` agrees
with the HuggingFace forward pass. Exits 77 when torch or transformers is
missing.
"""

import argparse
import json
import os
import struct
import subprocess
import sys
import tempfile

MAGIC = b"T2MARC01"
CONFIG_KEYS = (
    "hidden_size",
    "num_hidden_layers",
    "num_attention_heads",
    "intermediate_size",
    "vocab_size",
    "max_position_embeddings",
    "type_vocab_size",
    "layer_norm_eps",
    "hidden_act",
)


def write_archive(path, arrays, meta):
    """arrays: list of (name, float32 numpy array)."""
    entries, payload, offset = [], [], 0
    for name, a in arrays:
        data = a.astype("<f4", copy=False).tobytes()
        entries.append({"name": name, "dtype": "f32", "shape": list(a.shape), "offset": offset, "nbytes": len(data)})
        pad = (-len(data)) % 8
        payload.append(data + b"\0" * pad)
        offset += len(data) + pad
    header = json.dumps({"meta": meta, "arrays": entries}).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for chunk in payload:
            f.write(chunk)
    os.replace(tmp, path)


def export(model, tokenizer, out_dir, source):
    os.makedirs(out_dir, exist_ok=True)
    cfg = model.config.to_dict()
    if cfg.get("hidden_act") != "gelu":
        raise SystemExit(f"unsupported activation {cfg.get('hidden_act')!r}; t2m implements exact gelu")
    with open(os.path.join(out_dir, "config.json"), "w") as f:
        json.dump({k: cfg[k] for k in CONFIG_KEYS if k in cfg}, f, indent=2)
    vocab = sorted(tokenizer.get_vocab().items(), key=lambda kv: kv[1])
    if [i for _, i in vocab] != list(range(len(vocab))):
        raise SystemExit("tokenizer vocabulary ids are not contiguous")
    with open(os.path.join(out_dir, "vocab.txt"), "w", encoding="utf-8") as f:
        f.write("".join(piece + "\n" for piece, _ in vocab))

    arrays = []
    for name, t in model.state_dict().items():
        if name.startswith("bert."):
            name = name[len("bert."):]
        if not (name.startswith("embeddings.") or name.startswith("encoder.")):
            continue
        if name.endswith("position_ids") or name.endswith("token_type_ids"):
            continue
        arrays.append((name, t.detach().cpu().float().numpy()))
    write_archive(os.path.join(out_dir, "weights.t2ma"), arrays, {"source": source})
    return len(arrays)


def self_test(t2m):
    try:
        import numpy as np
        import torch
        from transformers import BertConfig, BertModel, BertTokenizerFast
    except ImportError as e:
        print(f"skipping: {e}")
        return 77

    words = ["a", "person", "walks", "forward", "and", "turns", "left"]
    pieces = ["##s", "##ly", "##ing", "wave", "turn", "jump", "slow", "walk"]
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + words + pieces
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=3,
        num_attention_heads=4,
        intermediate_size=48,
        max_position_embeddings=64,
        hidden_act="gelu",
    )
    model = BertModel(config).eval()
    # layer norms initialise to identity; perturb them so they are exercised
    with torch.no_grad():
        for name, p in model.named_parameters():
            if "LayerNorm" in name:
                p.add_(0.1 * torch.randn_like(p))

    with tempfile.TemporaryDirectory() as tmp:
        vocab_file = os.path.join(tmp, "vocab_in.txt")
        with open(vocab_file, "w") as f:
            f.write("\n".join(vocab) + "\n")
        tokenizer = BertTokenizerFast(vocab_file, do_lower_case=False)
        out_dir = os.path.join(tmp, "bert")
        export(model, tokenizer, out_dir, "self-test")

        reference = model.double()
        failures = 0
        for sentence in ["a person walks forward", "a person waves slowly and turns left", "jumps"]:
            for pooling in ["mean", "first"]:
                layers = [1, 3]
                cmd = [t2m, "--log-level", "error", "embed", "--sentence", sentence, "--bert-dir", out_dir,
                       "--pooling", pooling, "--layers", ",".join(map(str, layers))]
                got = json.loads(subprocess.run(cmd, check=True, capture_output=True, text=True).stdout)

                split = sentence.split()
                enc = tokenizer(split, is_split_into_words=True, return_tensors="pt")
                with torch.no_grad():
                    hs = reference(**enc, output_hidden_states=True).hidden_states
                word_ids = enc.word_ids()
                expected = []
                for w in range(len(split)):
                    pos = [k for k, wid in enumerate(word_ids) if wid == w]
                    if pooling == "first":
                        pos = pos[:1]
                    expected.append(np.concatenate([hs[l][0, pos].mean(dim=0).numpy() for l in layers]))
                expected = np.stack(expected)
                actual = np.asarray(got["vectors"])
                err = float(np.max(np.abs(actual - expected))) if actual.shape == expected.shape else float("inf")
                ok = got["words"] == split and err < 1e-6
                failures += not ok
                print(f"{'ok' if ok else 'FAIL'}  {pooling:5s} {sentence!r}: max abs diff {err:.3g}")
        return 1 if failures else 0


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--model", help="HuggingFace model name or local directory")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--self-test", action="store_true")
    ap.add_argument("--t2m", help="path to the t2m binary (self-test)")
    args = ap.parse_args()

    if args.self_test:
        if not args.t2m:
            ap.error("--self-test needs --t2m")
        return self_test(args.t2m)
    if not args.model or not args.out:
        ap.error("--model and --out are required")
    from transformers import AutoTokenizer, BertModel

    model = BertModel.from_pretrained(args.model, add_pooling_layer=False).eval()
    tokenizer = AutoTokenizer.from_pretrained(args.model)
    n = export(model, tokenizer, args.out, args.model)
    print(f"wrote {n} arrays to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
