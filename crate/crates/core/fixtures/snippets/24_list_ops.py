result = []
result.append(x)
result.sort()
result.reverse()
