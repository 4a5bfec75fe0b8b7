"""fusionkit: a multimodal video retrieval engine.

Keyframe ingestion with reproducible timestamp maps, dual-space late-fusion
embedding search, BM25 text search over OCR/ASR segments, yes-count VQA
reranking, and category-routed question answering, exposed as an HTTP
service and a CLI.
"""

__version__ = "0.1.0"
