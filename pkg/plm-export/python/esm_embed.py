"""Per-residue embedding helper: reads one sequence on stdin, prints
JSON {"dim": D, "rows": [[...], ...]} with special tokens stripped so
rows align 1:1 with residues. Exits non-zero when the model cannot be
loaded (missing weights, no network, no transformers install)."""

import argparse
import json
import sys


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--model", required=True)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args()

    sequence = sys.stdin.read().strip()
    if not sequence:
        print("empty sequence", file=sys.stderr)
        return 2

    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        print(f"transformers/torch unavailable: {exc}", file=sys.stderr)
        return 3

    try:
        tokenizer = AutoTokenizer.from_pretrained(args.model)
        model = AutoModel.from_pretrained(args.model)
    except Exception as exc:
        print(f"cannot load {args.model}: {exc}", file=sys.stderr)
        return 3

    model.eval().to(args.device)
    with torch.no_grad():
        batch = tokenizer(sequence, return_tensors="pt").to(args.device)
        hidden = model(**batch).last_hidden_state[0]
    # drop BOS/EOS so row i is residue i
    rows = hidden[1 : len(sequence) + 1].cpu().double().tolist()
    json.dump({"dim": int(model.config.hidden_size), "rows": rows}, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
