s = sum(nums)
big = max(nums)
small = min(nums)
ordered = sorted(nums)
