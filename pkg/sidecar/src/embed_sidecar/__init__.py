from .app import DEFAULT_MODEL_ID, SentenceTransformerEncoder, create_app

__all__ = ["DEFAULT_MODEL_ID", "SentenceTransformerEncoder", "create_app"]
