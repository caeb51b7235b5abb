from storage.run_store import RunStore, chain_frame, read_checkpoint

__all__ = ["RunStore", "chain_frame", "read_checkpoint"]
