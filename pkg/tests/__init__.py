# Package initializer for tests

