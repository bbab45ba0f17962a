# Package initializer for embeddings
