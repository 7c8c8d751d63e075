"""Write the small ONNX test model used by the core crate's backend tests.

usage: make_onnx_fixture.py <outdir>

The model is a single linear layer over a 4x4 RGB image in NCHW order with
five output logits. Weights come from a fixed seed and are also written as
JSON so tests can recompute the logits independently.
"""
import json
import sys

import torch


def main():
    out = sys.argv[1]
    torch.manual_seed(7)
    layer = torch.nn.Linear(48, 5)
    model = torch.nn.Sequential(torch.nn.Flatten(), layer).eval()
    torch.onnx.export(
        model,
        torch.zeros(1, 3, 4, 4),
        f"{out}/linear5.onnx",
        opset_version=13,
        input_names=["input"],
        output_names=["logits"],
        dynamo=False,
    )
    weights = {
        "weight_chw": [[round(float(v), 8) for v in row] for row in layer.weight.detach()],
        "bias": [round(float(v), 8) for v in layer.bias.detach()],
    }
    with open(f"{out}/linear5.weights.json", "w") as f:
        json.dump(weights, f, indent=1)
    manifest = {
        "model_name": "linear5",
        "onnx_path": "linear5.onnx",
        "input_shape": [4, 4, 3],
        "mean": [0.485, 0.456, 0.406],
        "std": [0.229, 0.224, 0.225],
        "class_count": 5,
        "logits_or_probs": "logits",
        "opset": 13,
        "source_weights_id": "torch.manual_seed(7) nn.Linear(48, 5)",
    }
    with open(f"{out}/linear5.manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
