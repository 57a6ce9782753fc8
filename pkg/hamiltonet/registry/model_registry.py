"""
Model Registry - Manages trained dynamics models with versioning and metadata

Checkpoints are JSON text documents: model kind, phase dimension, seed, inversion
policy and every network matrix as rows of 17-significant-digit decimals, so a
checkpoint reloads bit-exactly.
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from hamiltonet.io_utils import PathLike, atomic_write_json, read_json
from hamiltonet.models import DynamicsModel, model_from_dict

logger = logging.getLogger(__name__)


def save_checkpoint(model: DynamicsModel, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> Path:
    payload = model.to_dict()
    payload['metadata'] = metadata or {}
    path = atomic_write_json(path, payload)
    logger.info(f"✓ Saved {model.kind.value} checkpoint: {path}")
    return path


def load_checkpoint(path: PathLike) -> DynamicsModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    return model_from_dict(read_json(path))


class ModelRegistry:
    """
    Registry of checkpoints under one directory.
    Versions are consecutive integers per model name; the latest is the highest.
    """

    def __init__(self, registry_dir: PathLike = "runs/registry"):
        self.registry_dir = Path(registry_dir)
        self.registry_dir.mkdir(parents=True, exist_ok=True)
        self.metadata_file = self.registry_dir / "registry.json"
        self.metadata = self._load_metadata()

    def _load_metadata(self) -> Dict:
        """Load registry metadata from JSON file"""
        if self.metadata_file.exists():
            return read_json(self.metadata_file)
        return {"models": {}}

    def _save_metadata(self):
        atomic_write_json(self.metadata_file, self.metadata)

    def register_model(
        self,
        model: DynamicsModel,
        model_name: str,
        metrics: Optional[Dict] = None,
        training_config: Optional[Dict] = None,
        dataset_manifest: Optional[Dict] = None,
        description: Optional[str] = None,
        tags: Optional[List[str]] = None,
    ) -> str:
        """
        Register a trained model in the registry

        Args:
            model: Trained dynamics model
            model_name: Name of the model (e.g., 'lv_ghnn')
            metrics: Training metrics (final loss, survivors, ...)
            training_config: TrainConfig as a dictionary
            dataset_manifest: Manifest of the training dataset
            description: Model description
            tags: Tags for categorization

        Returns:
            model_id: Unique identifier for the registered model
        """
        versions = self.metadata["models"].get(model_name, [])
        version = max((int(m["version"]) for m in versions), default=0) + 1
        model_id = f"{model_name}_v{version}"

        model_path = self.registry_dir / f"{model_id}.json"
        save_checkpoint(model, model_path, {"model_id": model_id})

        metadata_entry = {
            "model_name": model_name,
            "model_id": model_id,
            "version": version,
            "model_kind": model.kind.value,
            "d": model.d,
            "parameter_count": model.parameter_count,
            "model_path": str(model_path),
            "registered_at": datetime.now().isoformat(),
            "metrics": metrics or {},
            "training_config": training_config or {},
            "dataset": dataset_manifest or {},
            "description": description or "",
            "tags": tags or [],
            "status": "active",
        }

        self.metadata["models"].setdefault(model_name, []).append(metadata_entry)
        self._save_metadata()

        logger.info(f"✓ Registered model: {model_id}")
        logger.info(f"  Kind: {model.kind.value}")
        logger.info(f"  Metrics: {metrics}")

        return model_id

    def get_model_metadata(self, model_name: str, version: Optional[int] = None) -> Dict:
        """Metadata of one version (latest if not specified)"""
        if model_name not in self.metadata["models"]:
            raise ValueError(f"Model '{model_name}' not found in registry")

        versions = self.metadata["models"][model_name]
        if version is None:
            return max(versions, key=lambda m: int(m["version"]))

        entry = next((m for m in versions if int(m["version"]) == int(version)), None)
        if entry is None:
            raise ValueError(f"Version '{version}' not found for model '{model_name}'")
        return entry

    def load_model(self, model_name: str, version: Optional[int] = None) -> DynamicsModel:
        entry = self.get_model_metadata(model_name, version)
        model = load_checkpoint(entry["model_path"])
        logger.info(f"✓ Loaded model: {entry['model_id']}")
        return model

    def list_models(self) -> List[Dict]:
        """All registered models with their latest versions"""
        models_list = []
        for model_name, versions in self.metadata["models"].items():
            latest = max(versions, key=lambda m: int(m["version"]))
            models_list.append({
                "model_name": model_name,
                "latest_version": latest["version"],
                "model_kind": latest["model_kind"],
                "total_versions": len(versions),
                "last_updated": latest["registered_at"],
                "metrics": latest["metrics"],
                "status": latest["status"],
            })
        return models_list

    def list_model_versions(self, model_name: str) -> List[Dict]:
        if model_name not in self.metadata["models"]:
            raise ValueError(f"Model '{model_name}' not found in registry")
        return sorted(self.metadata["models"][model_name], key=lambda m: int(m["version"]), reverse=True)

    def delete_model(self, model_name: str, version: Optional[int] = None):
        """
        Delete a model or specific version
        If version is None, deletes all versions of the model
        """
        if model_name not in self.metadata["models"]:
            raise ValueError(f"Model '{model_name}' not found in registry")

        versions = self.metadata["models"][model_name]
        doomed = versions if version is None else [self.get_model_metadata(model_name, version)]
        for entry in doomed:
            model_path = Path(entry["model_path"])
            if model_path.exists():
                model_path.unlink()

        remaining = [m for m in versions if m not in doomed]
        if remaining:
            self.metadata["models"][model_name] = remaining
            logger.info(f"✓ Deleted model version: {model_name}_v{version}")
        else:
            del self.metadata["models"][model_name]
            logger.info(f"✓ Deleted all versions of model: {model_name}")

        self._save_metadata()
