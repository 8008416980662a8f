name = input()
age = input("Age: ")
