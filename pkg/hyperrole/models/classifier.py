import torch
from torch import nn


class RoleMLP(nn.Module):
    """Two-layer perceptron: affine, batch norm, ReLU, dropout, affine to class logits."""

    def __init__(self, in_features: int, hidden_width: int, n_classes: int, dropout: float):
        super().__init__()
        self.in_features = in_features
        self.net = nn.Sequential(
            nn.Linear(in_features, hidden_width),
            nn.BatchNorm1d(hidden_width),
            nn.ReLU(),
            nn.Dropout(dropout),
            nn.Linear(hidden_width, n_classes),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)
