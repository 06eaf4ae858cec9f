def bubble_sort(items):
    result = list(items)
    n = len(result)
    for i in range(n):
        for j in range(n - 1 - i):
            if result[j] < result[j + 1]:
                tmp = result[j]
                result[j] = result[j + 1]
                result[j + 1] = tmp
    return result
