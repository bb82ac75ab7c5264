from beta import combine


def prepare(raw):
    staged = combine(raw)
    return staged


def rescale(value):
    doubled = value + value
    return doubled
