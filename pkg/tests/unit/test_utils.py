import argparse
import os
import stat
import tempfile
from unittest import TestCase

from fbod.utils import atomic_path, default_file_mode, parse_range, parse_sizes, positive_int, seed_int


class ParseRangeTest(TestCase):
    def test_inclusive_range(self):
        self.assertEqual(parse_range('5:100:5'), list(range(5, 101, 5)))
        self.assertEqual(len(parse_range('5:100:5')), 20)
        self.assertEqual(len(parse_range('1:20:1')), 20)

    def test_empty_range(self):
        self.assertEqual(parse_range('10:5:1'), [])

    def test_invalid_range(self):
        for value in ['5:100', 'a:b:c', '1:10:0', '0:10:1']:
            with self.assertRaises(argparse.ArgumentTypeError):
                parse_range(value)


class ParseSizesTest(TestCase):
    def test_sizes(self):
        self.assertEqual(parse_sizes('10000,100000'), [10000, 100000])
        self.assertEqual(parse_sizes('5'), [5])

    def test_sizes_not_increasing(self):
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_sizes('100,10')
        with self.assertRaises(argparse.ArgumentTypeError):
            parse_sizes('10,10')


class FlagTypesTest(TestCase):
    def test_positive_int(self):
        self.assertEqual(positive_int('3'), 3)
        with self.assertRaises(argparse.ArgumentTypeError):
            positive_int('0')

    def test_seed_int(self):
        self.assertEqual(seed_int('0x10'), 16)
        self.assertEqual(seed_int(str(2 ** 64 - 1)), 2 ** 64 - 1)
        with self.assertRaises(argparse.ArgumentTypeError):
            seed_int(str(2 ** 64))


class AtomicPathTest(TestCase):
    def test_failure_leaves_nothing(self):
        with tempfile.TemporaryDirectory() as directory:
            target = os.path.join(directory, 'out.csv')
            with self.assertRaises(RuntimeError):
                with atomic_path(target) as tmp_path:
                    with open(tmp_path, 'w') as handle:
                        handle.write('partial')
                    raise RuntimeError('boom')
            self.assertEqual(os.listdir(directory), [])

    def test_success_moves_file(self):
        with tempfile.TemporaryDirectory() as directory:
            target = os.path.join(directory, 'out.csv')
            with atomic_path(target) as tmp_path:
                with open(tmp_path, 'w') as handle:
                    handle.write('done')
            with open(target) as handle:
                self.assertEqual(handle.read(), 'done')
            self.assertEqual(os.listdir(directory), ['out.csv'])

    def test_mode_follows_umask(self):
        previous = os.umask(0o022)
        try:
            self.assertEqual(default_file_mode(), 0o644)
            with tempfile.TemporaryDirectory() as directory:
                target = os.path.join(directory, 'out.csv')
                with atomic_path(target) as tmp_path:
                    with open(tmp_path, 'w') as handle:
                        handle.write('done')
                self.assertEqual(stat.S_IMODE(os.stat(target).st_mode), 0o644)
        finally:
            os.umask(previous)
