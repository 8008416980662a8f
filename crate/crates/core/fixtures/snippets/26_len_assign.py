n = len(items)
