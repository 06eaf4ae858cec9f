from dataset import EMPTY, category_index
from toyunit import expect_eq, run


def test_category_index_found():
    expect_eq(1, category_index(["A", "B", "C"], "B"))


def test_category_index_missing():
    empty = list(EMPTY)
    expect_eq(-1, category_index(empty, "ABC"))


if __name__ == "__main__":
    run([test_category_index_found, test_category_index_missing])
