from refaas.service.app import TOKEN_HEADER, create_app
from refaas.service.config import BackendConfig, ServiceConfig, config_from_dict, load_config
from refaas.service.core import CallbackSender, RefaasService, build_gateway
from refaas.service.queue import JobQueue, JobQueueEntry, WorkerPool
from refaas.service.store import ArtifactKind, ArtifactStore, ArtifactStoreRecord

__all__ = [
    "TOKEN_HEADER",
    "ArtifactKind",
    "ArtifactStore",
    "ArtifactStoreRecord",
    "BackendConfig",
    "CallbackSender",
    "JobQueue",
    "JobQueueEntry",
    "RefaasService",
    "ServiceConfig",
    "WorkerPool",
    "build_gateway",
    "config_from_dict",
    "create_app",
    "load_config",
]
