"""Category lookup over a keyed dataset."""

EMPTY = []


def category_index(categories, key):
    for i, category in enumerate(categories):
        if category == key:
            return i
    return None


def category_count(categories):
    return len(categories)
