if a and not b:
    flag = True
elif a or b:
    flag = False
