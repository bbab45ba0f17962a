# Package initializer for documents
