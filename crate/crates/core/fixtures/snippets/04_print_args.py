print("hello", name)
print()
