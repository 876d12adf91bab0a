from refaas.llm.backends import HttpBackend, LlmExchange, LlmRequest, ReplayBackend, ReplayEntry, whitespace_tokens
from refaas.llm.extract import extract_code, looks_like_code
from refaas.llm.gateway import LlmGateway
from refaas.llm.templates import PromptTemplate, load_templates, render

__all__ = [
    "HttpBackend",
    "LlmExchange",
    "LlmGateway",
    "LlmRequest",
    "PromptTemplate",
    "ReplayBackend",
    "ReplayEntry",
    "extract_code",
    "load_templates",
    "looks_like_code",
    "render",
    "whitespace_tokens",
]
