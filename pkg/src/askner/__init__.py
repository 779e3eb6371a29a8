"""askner: generate weakly labeled NER datasets from type-question retrieval.

Ask a phrase-retrieval backend questions like "Which disease?", pool the
returned phrases into a pseudo-dictionary, annotate the evidence sentences
by dictionary matching, and refine the weak labels with teacher-student
self-training.
"""

__version__ = "0.1.0"
