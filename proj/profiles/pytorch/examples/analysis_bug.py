import torch

class Model(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.pool = torch.nn.FractionalMaxPool2d(kernel_size=2, output_ratio=0.5)

    def forward(self, x):
        return self.pool(x)

x = torch.randn(1, 2, 8, 8)
inputs = [x]
