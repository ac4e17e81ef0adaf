"""
Data validation schemas for tabular inputs and outputs.

This module defines pandas DataFrame schemas using pandera for contact
traces, profile sample tables and per-frame latency exports.
"""

from typing import Any, Dict

import pandas as pd
import pandera as pa
from pandera import Check, Column, DataFrameSchema

from .errors import InvalidProfile, InvalidTrace


def _contacts_do_not_overlap(df: pd.DataFrame) -> bool:
    ordered = df.sort_values(['sat_id', 'start_s'])
    previous_end = ordered.groupby('sat_id')['end_s'].shift()
    return bool((previous_end.isna() | (ordered['start_s'] >= previous_end)).all())


def _latency_adds_up(df: pd.DataFrame) -> pd.Series:
    known = df['end_to_end_s'].notna()
    total = df['revisit_s'] + df['analysis_s']
    return ~known | ((df['end_to_end_s'] - total).abs() <= 1e-6 * df['end_to_end_s'].abs().clip(lower=1.0))


class TabularSchema:
    """Schema definitions for tabular data."""

    # Ground contact windows, one row per contact
    CONTACT_TRACE_SCHEMA = DataFrameSchema(
        {
            "sat_id": Column(int, checks=[Check.greater_than_or_equal_to(1)], nullable=False),
            "start_s": Column(float, checks=[Check.greater_than_or_equal_to(0.0)], nullable=False),
            "end_s": Column(float, nullable=False),
            "rate_bps": Column(float, checks=[Check.greater_than(0.0)], nullable=False),
        },
        checks=[
            Check(lambda df: df['end_s'] > df['start_s'],
                  error="Contact end must be after contact start"),
            Check(_contacts_do_not_overlap,
                  error="Contacts of one satellite must not overlap"),
        ],
        strict=True,
        coerce=True
    )

    # Measured processing speed samples
    PROFILE_SAMPLES_SCHEMA = DataFrameSchema(
        {
            "function": Column(str, checks=[Check.str_length(min_value=1)], nullable=False),
            "quota": Column(float, checks=[Check.greater_than(0.0)], nullable=False),
            "speed": Column(float, checks=[Check.greater_than_or_equal_to(0.0)], nullable=False),
        },
        strict=True,
        coerce=True
    )

    # Per-frame latency export
    FRAME_LATENCY_SCHEMA = DataFrameSchema(
        {
            "frame": Column(int, checks=[Check.greater_than_or_equal_to(0)], nullable=False, unique=True),
            "revisit_s": Column(float, checks=[Check.greater_than_or_equal_to(0.0)], nullable=True),
            "analysis_s": Column(float, nullable=True),
            "end_to_end_s": Column(float, checks=[Check.greater_than_or_equal_to(0.0)], nullable=True),
        },
        checks=[
            Check(_latency_adds_up, error="end_to_end_s must equal revisit_s + analysis_s"),
        ],
        strict=True,
        coerce=True
    )


class DataValidator:
    """Data validation utilities for the toolkit."""

    def __init__(self) -> None:
        self.schemas = TabularSchema()

    def validate_contact_trace(self, df: pd.DataFrame) -> pd.DataFrame:
        """
        Validate a contact trace against its schema.

        Args:
            df: DataFrame with sat_id, start_s, end_s and rate_bps columns

        Returns:
            Validated DataFrame with coerced dtypes

        Raises:
            InvalidTrace: If validation fails
        """
        try:
            return self.schemas.CONTACT_TRACE_SCHEMA.validate(df)
        except (pa.errors.SchemaError, pa.errors.SchemaErrors) as e:
            raise InvalidTrace(f"Contact trace validation failed: {e}") from e

    def validate_profile_samples(self, df: pd.DataFrame) -> pd.DataFrame:
        """
        Validate a table of (function, quota, speed) samples.

        Raises:
            InvalidProfile: If validation fails
        """
        try:
            return self.schemas.PROFILE_SAMPLES_SCHEMA.validate(df)
        except (pa.errors.SchemaError, pa.errors.SchemaErrors) as e:
            raise InvalidProfile(f"Profile sample validation failed: {e}") from e

    def validate_frame_latencies(self, df: pd.DataFrame) -> pd.DataFrame:
        try:
            return self.schemas.FRAME_LATENCY_SCHEMA.validate(df)
        except (pa.errors.SchemaError, pa.errors.SchemaErrors) as e:
            raise ValueError(f"Frame latency validation failed: {e}") from e

    def generate_data_quality_report(self, df: pd.DataFrame, schema_type: str) -> Dict[str, Any]:
        """
        Generate a data quality report for the given DataFrame.

        Args:
            df: DataFrame to analyze
            schema_type: "contact_trace", "profile_samples" or "frame_latency"

        Returns:
            Dictionary containing quality metrics
        """
        report: Dict[str, Any] = {
            "total_rows": len(df),
            "total_columns": len(df.columns),
            "missing_values": {k: int(v) for k, v in df.isnull().sum().items()},
            "duplicate_rows": int(df.duplicated().sum()),
        }

        validators = {
            "contact_trace": self.validate_contact_trace,
            "profile_samples": self.validate_profile_samples,
            "frame_latency": self.validate_frame_latencies,
        }
        if schema_type not in validators:
            report["validation_status"] = "UNKNOWN_SCHEMA"
            return report
        try:
            validators[schema_type](df)
            report["validation_status"] = "PASSED"
        except ValueError as e:
            report["validation_status"] = "FAILED"
            report["validation_errors"] = str(e)

        return report
