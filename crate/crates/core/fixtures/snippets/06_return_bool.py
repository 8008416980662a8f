def is_ok(x):
    if x > 0:
        return True
    return False
