# Package initializer for evaluation
