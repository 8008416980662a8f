def area(r: float) -> float:
    return 3.14159 * r * r
