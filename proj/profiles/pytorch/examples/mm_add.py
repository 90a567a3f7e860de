import torch

class Model(torch.nn.Module):
    def forward(self, x1, x2, bias):
        y = torch.mm(x1, x2)
        return torch.add(y, bias)

x1 = torch.randn(2, 10)
x2 = torch.randn(10, 2)
bias = torch.randn(2, 2)
inputs = [x1, x2, bias]
