"""
Invariant rules for result tables
Validates simulation output against the YAML rules in configs/invariants.yml
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import great_expectations as ge
import numpy as np
import pandas as pd
import yaml
from great_expectations.core.util import convert_to_json_serializable

from .errors import ConfigError

DEFAULT_RULES_PATH = Path(__file__).resolve().parents[1] / "configs" / "invariants.yml"


class InvariantChecker:
    def __init__(self, config_path: Union[str, Path] = DEFAULT_RULES_PATH):
        """Initialize with rule configuration"""
        self.logger = logging.getLogger(__name__)
        self.config = self._load_config(config_path)
        self.validation_results: List[Dict[str, Any]] = []

    def _load_config(self, config_path: Union[str, Path]) -> Dict:
        """Load invariant rules from config"""
        try:
            with open(config_path) as f:
                config = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot load invariant rules: {exc}", str(config_path))
        if not isinstance(config.get("tables", {}), dict):
            raise ConfigError("`tables` must map table names to rule lists", str(config_path))
        return config

    def validate_table(self, df: pd.DataFrame, table_name: str) -> bool:
        """Run all configured rules for a table"""
        rules = self.config.get("tables", {}).get(table_name, [])

        # infinities count as missing values
        ge_df = ge.from_pandas(df.replace([np.inf, -np.inf], np.nan).reset_index(drop=True))

        results = []
        for rule in rules:
            rule_type = rule["type"]
            column = rule["column"]
            missing = [c for c in (column, rule.get("other")) if c is not None and c not in df.columns]
            if missing:
                success, detail = False, {"missing_column": missing[0]}
            else:
                result = self._expect(ge_df, rule)
                success, detail = result.success, convert_to_json_serializable(result.result)

            if not success:
                self.logger.warning(
                    "invariant failed on %s: %s (%s)", table_name, rule.get("description", rule_type), detail
                )
            results.append({
                "table": table_name,
                "rule": rule,
                "success": bool(success),
                "result": detail,
            })

        self.validation_results.extend(results)
        return all(r["success"] for r in results)

    def _expect(self, ge_df, rule: Dict[str, Any]):
        """Map one rule onto its expectation"""
        rule_type = rule["type"]
        column = rule["column"]

        if rule_type == "not_null":
            return ge_df.expect_column_values_to_not_be_null(column, mostly=rule.get("threshold", 1.0))

        if rule_type == "range":
            return ge_df.expect_column_values_to_be_between(
                column,
                min_value=rule.get("min"),
                max_value=rule.get("max"),
                strict_min=bool(rule.get("min_exclusive", False)),
                strict_max=bool(rule.get("max_exclusive", False)),
            )

        if rule_type == "less_than":
            other = rule["other"]
            bound = f"{other}+tolerance"
            ge_df[bound] = ge_df[other] + rule.get("tolerance", 0.0)
            return ge_df.expect_column_pair_values_A_to_be_greater_than_B(bound, column, or_equal=False)

        if rule_type == "sorted":
            return ge_df.expect_column_values_to_be_increasing(column)

        raise ConfigError(f"unknown invariant rule type {rule_type!r}")

    def failures(self) -> List[Dict[str, Any]]:
        return [r for r in self.validation_results if not r["success"]]

    def generate_report(self, output_path: Optional[Union[str, Path]] = None) -> Dict:
        """Generate a summary report of invariant checks"""
        report = {
            "timestamp": datetime.now().isoformat(),
            "overall_status": all(r["success"] for r in self.validation_results),
            "total_checks": len(self.validation_results),
            "passed_checks": sum(1 for r in self.validation_results if r["success"]),
            "failed_checks": sum(1 for r in self.validation_results if not r["success"]),
            "details": self.validation_results,
        }

        if output_path:
            with open(output_path, "w") as f:
                yaml.safe_dump(report, f)

        return report
