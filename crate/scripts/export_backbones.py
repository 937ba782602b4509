"""Export torchvision convolutional trunks to ONNX with citrusfx manifests.

    python scripts/export_backbones.py OUT_DIR [--random-weights]

Each model is cut after its last convolutional block, so the output tensor
"features" is [N, C, 7, 7] for a 224x224 input. Pretrained ImageNet weights
are downloaded by torchvision unless --random-weights is given (handy for
checking shapes offline).
"""

import argparse
import json
import pathlib

import torch
import torchvision


def trunks(pretrained):
    w = lambda enum: enum.DEFAULT if pretrained else None
    vgg16 = torchvision.models.vgg16(weights=w(torchvision.models.VGG16_Weights))
    vgg19 = torchvision.models.vgg19(weights=w(torchvision.models.VGG19_Weights))
    resnet = torchvision.models.resnet50(weights=w(torchvision.models.ResNet50_Weights))
    yield "vgg16", vgg16.features, 512
    yield "vgg19", vgg19.features, 512
    yield "resnet50", torch.nn.Sequential(*list(resnet.children())[:-2]), 2048


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=pathlib.Path)
    ap.add_argument("--random-weights", action="store_true")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name, net, channels in trunks(not args.random_weights):
        net.eval()
        dummy = torch.zeros(1, 3, 224, 224)
        torch.onnx.export(
            net,
            dummy,
            args.out / f"{name}.onnx",
            input_names=["input"],
            output_names=["features"],
            dynamic_axes={"input": {0: "N"}, "features": {0: "N"}},
            opset_version=13,
            dynamo=False,
        )
        manifest = {
            "kind": name,
            "input_name": "input",
            "output_name": "features",
            "preprocessing": "unit_scale_torch",
            "channel_order_expected": "rgb",
            "tap": "flatten_last_conv",
            "output_dim": channels * 7 * 7,
        }
        (args.out / f"{name}.json").write_text(json.dumps(manifest, indent=2) + "\n")
        print(f"{name}: {manifest['output_dim']}")


if __name__ == "__main__":
    main()
