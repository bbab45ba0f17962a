# Package initializer for cli
