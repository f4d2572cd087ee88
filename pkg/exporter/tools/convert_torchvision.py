#!/usr/bin/env python3
"""Convert torchvision checkpoints into the exporter's WGT1 weight bundle.

Run this offline, wherever torch + torchvision and the checkpoints are
available; the exporter itself never touches the network.

    python convert_torchvision.py vgg19 vgg19.wgt
    python convert_torchvision.py wrn50 wrn50.wgt

vgg19 keeps only the first two conv layers; wrn50 keeps the trunk through
the second residual stage of wide_resnet50_2.
"""

import struct
import sys

import numpy as np


def save_bundle(tensors, path):
    blob = bytearray()
    blob += b"WGT1"
    blob += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", arr.ndim)
        for d in arr.shape:
            blob += struct.pack("<I", d)
        blob += arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


def vgg19_tensors():
    from torchvision.models import VGG19_Weights, vgg19
    model = vgg19(weights=VGG19_Weights.IMAGENET1K_V1).eval()
    state = model.state_dict()
    keep = ("features.0.weight", "features.0.bias",
            "features.2.weight", "features.2.bias")
    return {k: state[k].numpy() for k in keep}


def wrn50_tensors():
    from torchvision.models import Wide_ResNet50_2_Weights, wide_resnet50_2
    model = wide_resnet50_2(weights=Wide_ResNet50_2_Weights.IMAGENET1K_V1).eval()
    state = model.state_dict()
    prefixes = ("conv1.", "bn1.", "layer1.", "layer2.")
    return {k: v.numpy() for k, v in state.items()
            if k.startswith(prefixes) and "num_batches_tracked" not in k}


def main():
    if len(sys.argv) != 3 or sys.argv[1] not in ("vgg19", "wrn50"):
        print(__doc__)
        return 2
    backbone, out = sys.argv[1], sys.argv[2]
    tensors = vgg19_tensors() if backbone == "vgg19" else wrn50_tensors()
    save_bundle(tensors, out)
    print(f"wrote {len(tensors)} tensors to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
