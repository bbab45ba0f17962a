# Shared records, errors, seeding and on-disk artifacts
