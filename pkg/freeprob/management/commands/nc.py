import pandas as pd

from freeprob.nc_partitions import enumerate_nc, enumerate_nc2, nesting_forest, parse_partition

from ._base import FreeprobCommand


def _node_json(node):
    return {'block': list(node.block),
            'children': [{'after': p, 'node': _node_json(child)} for p, child in node.children]}


class Command(FreeprobCommand):
    help = 'Enumerate non-crossing partitions and show nesting forests'
    command_name = 'nc'

    def add_actions(self, subparsers):
        count = self.add_action(subparsers, 'count', 'Number of non-crossing (pair) partitions of n')
        count.add_argument('n', type=int)
        count.add_argument('--pairs', action='store_true', help='Count pair partitions only')

        listing = self.add_action(subparsers, 'list', 'All non-crossing (pair) partitions of n')
        listing.add_argument('n', type=int)
        listing.add_argument('--pairs', action='store_true', help='List pair partitions only')

        forest = self.add_action(subparsers, 'forest', 'Nesting forest of a partition such as {{1,4},{2,3}}')
        forest.add_argument('partition')

    def _partitions(self, n, pairs):
        return enumerate_nc2(n) if pairs else enumerate_nc(n)

    def handle_count(self, n, pairs, **options):
        return {'n': n, 'pairs': pairs, 'count': len(self._partitions(n, pairs))}

    def handle_list(self, n, pairs, **options):
        partitions = self._partitions(n, pairs)
        return {'n': n, 'pairs': pairs, 'count': len(partitions),
                'partitions': [{'blocks': str(p), 'dyck': p.dyck_word()} for p in partitions]}

    def handle_forest(self, partition, **options):
        parsed = parse_partition(partition)
        forest = nesting_forest(parsed)
        return {'partition': str(parsed), 'n': parsed.n, 'roots': [_node_json(root) for root in forest.roots]}

    def to_frame(self, payload):
        if 'partitions' in payload:
            return pd.DataFrame(payload['partitions'])
        return None

    def write_text(self, payload):
        if 'partitions' in payload:
            for entry in payload['partitions']:
                self.stdout.write(entry['blocks'])
        elif 'count' in payload:
            self.stdout.write(str(payload['count']))
        else:
            super().write_text(payload)
