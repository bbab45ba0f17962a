# Package initializer for corpus
