counts = {}
counts[word] = counts.get(word, 0) + 1
