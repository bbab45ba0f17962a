# Package initializer for monitoring

