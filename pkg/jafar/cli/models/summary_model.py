from pydantic import BaseModel, Field


class TrainSummary(BaseModel):
    steps: int = Field(..., ge=1, description="Optimizer steps run.", examples=[2000])

    first_window_loss: float = Field(
        ...,
        description="Mean loss over the first 100 steps.",
        examples=[1.42],
    )

    last_window_loss: float = Field(
        ...,
        description="Mean loss over the last 100 steps.",
        examples=[0.51],
    )

    final_loss: float = Field(..., description="Loss of the last step.", examples=[0.49])

    checkpoint: str = Field(
        ...,
        description="Path of the written checkpoint.",
        examples=["runs/desk.jfck"],
    )


class CamMetricsSummary(BaseModel):
    pairs: int = Field(..., ge=0, description="Score pairs read.", examples=[50])

    avg_drop: float = Field(..., ge=0, le=100, description="Average Drop (%).")
    avg_increase: float = Field(..., ge=0, le=100, description="Average Increase (%).")
    avg_gain: float = Field(..., ge=0, le=100, description="Average Gain (%).")

    gain_skipped: int = Field(
        ...,
        ge=0,
        description="Pairs skipped by Average Gain because the full score is 1.",
    )

    coherency: float | None = Field(
        None,
        ge=0,
        le=100,
        description="Mean coherency over CAM pairs (%); absent without maps.",
    )

    complexity: float | None = Field(
        None,
        ge=0,
        le=100,
        description="Mean share of active pixels in the original CAMs (%).",
    )

    adcc: float | None = Field(
        None,
        ge=0,
        le=100,
        description="Harmonic mean of coherency, 1 - complexity and 1 - avg_drop (%).",
    )
