def grade(score):
    # map a numeric score to a letter
    if score >= 90:
        letter = "A"
    elif score >= 75:
        letter = "B"
    else:
        letter = "C"
    print(letter)
    return letter

result = grade(80)
