def size(xs):
    return len(xs)
