import sys

sys.path.insert(0, '.')

if __name__ == '__main__':
    sys.path.insert(0, '..')
    from PyEprLab.Cli import main

    sys.exit(main(sys.argv[1:]))
