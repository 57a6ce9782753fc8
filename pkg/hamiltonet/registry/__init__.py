from hamiltonet.registry.model_registry import ModelRegistry, load_checkpoint, save_checkpoint

__all__ = ['ModelRegistry', 'load_checkpoint', 'save_checkpoint']
