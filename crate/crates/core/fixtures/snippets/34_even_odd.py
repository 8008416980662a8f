if n % 2 == 0:
    print("even")
if n % 2 != 0:
    print("odd")
