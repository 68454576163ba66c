import csv
import os

import datasets

_URL = "data/train.csv"


class Plain(datasets.GeneratorBasedBuilder):
    def _generate_examples(self, filepath):
        with open(os.path.join(filepath, "train.csv"), encoding="utf-8") as fh:
            for i, row in enumerate(csv.DictReader(fh)):
                yield i, row
