from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Section(BaseModel):
    """Config sections reject unknown keys."""

    model_config = ConfigDict(extra="forbid")


# ============ Ingestion ============

class ColumnSchema(_Section):
    """Transaction CSV column names. None means the column is absent."""

    chain: Optional[str] = "chain"
    token: Optional[str] = "token"
    tx_id: Optional[str] = "tx_id"
    timestamp: str = "timestamp"
    sender: str = Field("from", description="Column holding the sending address")
    recipient: str = Field("to", description="Column holding the receiving address")
    value: str = "value"
    function_name: Optional[str] = "function_name"


# ============ Geometry / embedding ============

class GeometryConfig(_Section):
    dim: int = Field(64, gt=0)
    eps_boundary: float = Field(1e-5, gt=0, lt=1)
    delta_stab: float = Field(1e-15, gt=0)


class TrainConfig(_Section):
    """Poincaré embedding trainer settings."""

    dim: int = Field(64, gt=0)
    margin: float = Field(1.0, gt=0, description="Hinge margin gamma")
    radial_weight: float = Field(0.1, ge=0, description="Radial regularizer weight beta")
    learning_rate: float = Field(0.05, gt=0)
    final_learning_rate: float = Field(0.005, gt=0)
    epochs: int = Field(500, gt=0)
    negatives_per_positive: int = Field(1, gt=0)
    batch_size: int = Field(1, gt=0)
    seed: int = 0
    init_scale: float = Field(1e-3, gt=0, lt=1)
    eps_boundary: float = Field(1e-5, gt=0, lt=1)
    workers: int = Field(1, gt=0, description="More than one selects hogwild updates")


class RefineConfig(_Section):
    """Trust-weighted refinement settings."""

    steps: int = Field(3, ge=1)
    smoothing_eps: float = Field(1e-6, gt=0)
    convergence_tol: float = Field(1e-4, gt=0)
    window_start: Optional[int] = None
    window_delta: Optional[int] = Field(None, gt=0, description="Window length in seconds")


class WalkConfig(_Section):
    walk_length: int = Field(5, ge=1)
    walks_per_node: int = Field(10, ge=1)
    context_size: int = Field(10, ge=1)
    dim: int = Field(64, gt=0)
    negatives: int = Field(5, ge=1)
    epochs: int = Field(5, ge=1)
    seed: int = 0
    workers: int = Field(1, ge=1)


class FeatureConfig(_Section):
    k_hop: int = Field(1, ge=1)


# ============ Classifier ============

class ClassifierConfig(_Section):
    """MLP role classifier settings and ablation flags."""

    hidden_width: int = Field(128, gt=0)
    dropout: float = Field(0.3, ge=0, lt=1)
    learning_rate: float = Field(1e-3, gt=0)
    weight_decay: float = Field(0.2, ge=0)
    max_epochs: int = Field(2000, gt=0)
    patience: int = Field(10, gt=0)
    val_fraction: float = Field(0.1, gt=0, lt=1)
    test_fraction: float = Field(0.2, gt=0, lt=1)
    batch_size: int = Field(32, ge=2)
    class_weighting: bool = False
    seed: int = 0
    use_hier: bool = True
    use_walk: bool = True

    @model_validator(mode="after")
    def _patience_below_budget(self):
        if self.patience >= self.max_epochs:
            raise ValueError("patience must be smaller than max_epochs")
        return self


class RulesConfig(_Section):
    """Optional overrides for the shipped rule files."""

    buidl: Optional[str] = None
    usdy: Optional[str] = None
    benji: Optional[str] = None
    roles: Optional[str] = None
    default_token_rules: str = "usdy"


class PipelineConfig(_Section):
    """Every section of the pipeline config file."""

    seed: int = 0
    columns: ColumnSchema = Field(default_factory=ColumnSchema)
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    embed: TrainConfig = Field(default_factory=TrainConfig)
    refine: RefineConfig = Field(default_factory=RefineConfig)
    walk: WalkConfig = Field(default_factory=WalkConfig)
    features: FeatureConfig = Field(default_factory=FeatureConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    rules: RulesConfig = Field(default_factory=RulesConfig)
